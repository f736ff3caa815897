package com.example.app17;

public class MainActivity {
    private String name = "item 17";

    public String label(int count) {
        String prefix = name.toUpperCase();
        return prefix + ":" + (count + 17);
    }

    public int total(int[] values) {
        int sum = 0;
        for (int v : values) {
            sum += v;
        }
        return sum;
    }
}
