package com.example.app20;

public class MainActivity {
    private String name = "item 20";

    public String label(int count) {
        String prefix = name.toUpperCase();
        return prefix + ":" + (count + 20);
    }

    public int total(int[] values) {
        int sum = 0;
        for (int v : values) {
            sum += v;
        }
        return sum;
    }
}
