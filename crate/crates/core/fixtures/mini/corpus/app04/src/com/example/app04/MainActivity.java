package com.example.app04;

public class MainActivity {
    private String name = "item 4";

    public String label(int count) {
        String prefix = name.toUpperCase();
        return prefix + ":" + (count + 4);
    }

    public int total(int[] values) {
        int sum = 0;
        for (int v : values) {
            sum += v;
        }
        return sum;
    }
}
