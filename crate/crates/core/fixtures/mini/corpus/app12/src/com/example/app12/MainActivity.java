package com.example.app12;

public class MainActivity {
    private String name = "item 12";

    public String label(int count) {
        String prefix = name.toUpperCase();
        return prefix + ":" + (count + 12);
    }

    public int total(int[] values) {
        int sum = 0;
        for (int v : values) {
            sum += v;
        }
        return sum;
    }
}
